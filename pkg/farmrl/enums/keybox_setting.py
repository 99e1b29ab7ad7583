from farmrl.base.str_enum import StrEnum


class KeyBoxSetting(StrEnum):
    """This enum represents the two KeyBox hallway settings.

    dense: subsections of width 3 with 2 distractors each, curriculum restarts in [1, n_done].
    sparse: subsections of width 5 with 4 distractors each, curriculum always restarts on level 1.
    """

    DENSE = "dense"
    SPARSE = "sparse"

    @property
    def width(self) -> int:
        return 3 if self is KeyBoxSetting.DENSE else 5

    @property
    def distractors(self) -> int:
        return 2 if self is KeyBoxSetting.DENSE else 4
