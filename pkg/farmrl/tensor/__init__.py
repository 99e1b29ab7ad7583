# flake8: noqa: F401
from farmrl.tensor.checkpoint import (
    load_checkpoint,
    read_manifest,
    save_checkpoint,
    verify_checkpoint,
)
from farmrl.tensor.errors import (
    BroadcastError,
    CheckpointError,
    CheckpointMismatchError,
    NonFiniteError,
    ShapeError,
    TapeError,
)
from farmrl.tensor.gradcheck import GradcheckReport, gradcheck
from farmrl.tensor.precision import default_dtype, get_default_dtype, set_default_dtype
from farmrl.tensor.tape import Tape, active_tape, backward
from farmrl.tensor.tensor import Tensor
