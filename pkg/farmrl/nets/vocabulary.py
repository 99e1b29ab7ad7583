from collections.abc import Iterable, Sequence

from pydantic import BaseModel, PrivateAttr, model_validator

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1


class Vocabulary(BaseModel):
    """
    Maps instruction words to embedding row ids. Ids 0 and 1 are reserved for padding and unknown words.

    Attributes
    ----------
    words : list[str]
        Word at each id, starting with the two reserved tokens.
    max_size : int
        Capacity of the embedding table the ids index into.
    """

    words: list[str]
    max_size: int = 1000

    _ids: dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def validate_words(cls, data: dict) -> dict:
        words = list(data.get("words", []))
        max_size = data.get("max_size", 1000)
        if words[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError(f"Vocabulary must start with the reserved tokens {PAD_TOKEN} and {UNK_TOKEN}.")
        if len(set(words)) != len(words):
            raise ValueError("Vocabulary words must be unique.")
        if len(words) > max_size:
            raise ValueError(f"Vocabulary has {len(words)} words but the maximum is {max_size}.")
        return data

    def model_post_init(self, __context: object) -> None:
        self._ids = {word: i for i, word in enumerate(self.words)}

    @classmethod
    def from_words(cls, words: Iterable[str], max_size: int = 1000) -> "Vocabulary":
        """Builds a vocabulary from the sorted distinct words, after the reserved tokens."""
        distinct = sorted({w for w in words} - {PAD_TOKEN, UNK_TOKEN})
        return cls(words=[PAD_TOKEN, UNK_TOKEN, *distinct], max_size=max_size)

    def __len__(self) -> int:
        return len(self.words)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self._ids.get(token, UNK_ID) for token in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.words[i] if 0 <= i < len(self.words) else UNK_TOKEN for i in ids]
