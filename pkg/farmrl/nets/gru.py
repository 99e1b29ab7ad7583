from collections.abc import Sequence

import numpy as np

from farmrl.nets.init import recurrent_orthogonal, truncated_normal
from farmrl.nets.layer import Layer
from farmrl.tensor import Tensor
from farmrl.tensor import ops


class GRULanguageEncoder(Layer):
    """Embeds instruction token ids and runs a GRU over them; the final hidden state is the task embedding.

    Gates follow r = σ(x W_xr + b_xr + h W_hr + b_hr), z likewise, n = tanh(x W_xn + b_xn + r ⊙ (h W_hn + b_hn)),
    h' = (1 − z) ⊙ n + z ⊙ h, with (r, z, n) packed along the columns of W_x and W_h.

    Parameters
    ----------
    vocab_size : int
        Rows of the embedding table. Token ids must be below it.
    embedding_dim : int
        Word embedding size.
    hidden_size : int
        GRU hidden size, and the length of the task embedding.
    rng : np.random.Generator
        Source for initial weights.
    """

    def __init__(
        self,
        vocab_size: int,
        embedding_dim: int,
        hidden_size: int,
        rng: np.random.Generator,
        name: str = "language",
    ) -> None:
        super().__init__(name)
        self.vocab_size = vocab_size
        self.hidden_size = hidden_size
        self.embedding = self.add_parameter(
            "embedding", truncated_normal(rng, (vocab_size, embedding_dim), embedding_dim)
        )
        self.W_x = self.add_parameter(
            "W_x", truncated_normal(rng, (embedding_dim, 3 * hidden_size), embedding_dim)
        )
        self.W_h = self.add_parameter("W_h", recurrent_orthogonal(rng, hidden_size, 3))
        self.b_x = self.add_parameter("b_x", np.zeros(3 * hidden_size))
        self.b_h = self.add_parameter("b_h", np.zeros(3 * hidden_size))

    def __call__(self, token_ids: Sequence[int]) -> Tensor:
        ids = list(token_ids)
        if not ids:
            return Tensor.zeros(self.hidden_size)
        for token_id in ids:
            if not 0 <= token_id < self.vocab_size:
                raise ValueError(
                    f"Token id {token_id} is outside the vocabulary of size {self.vocab_size}."
                )
        d = self.hidden_size
        embedded = ops.gather_rows(self.embedding, ids)
        x_proj = ops.matmul(embedded, self.W_x) + self.b_x
        h = Tensor.zeros(d)
        for t in range(len(ids)):
            x_t = ops.reshape(ops.slice_(x_proj, t, t + 1), (3 * d,))
            h_proj = ops.matmul(h, self.W_h) + self.b_h
            r = ops.sigmoid(ops.slice_(x_t, 0, d) + ops.slice_(h_proj, 0, d))
            z = ops.sigmoid(ops.slice_(x_t, d, 2 * d) + ops.slice_(h_proj, d, 2 * d))
            n = ops.tanh(ops.slice_(x_t, 2 * d, 3 * d) + r * ops.slice_(h_proj, 2 * d, 3 * d))
            h = (1.0 - z) * n + z * h
        return h
