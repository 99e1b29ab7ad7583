# flake8: noqa: F401
from farmrl.enums.actions import BalletAction, GridAction
from farmrl.enums.ballet_variant import BalletVariant
from farmrl.enums.color import Color
from farmrl.enums.env_name import EnvName
from farmrl.enums.event_tag import EventTag
from farmrl.enums.glyph import Glyph
from farmrl.enums.keybox_setting import KeyBoxSetting
from farmrl.enums.model_preset import ModelPreset
from farmrl.enums.object_kind import ObjectKind
from farmrl.enums.padding import Padding
from farmrl.enums.precision import Precision
