from enum import Enum


class StrEnum(str, Enum):
    def __repr__(self) -> str:
        """
        Returns the string representation of the enum. ex: 'sequential'
        """
        return self.__str__()

    def __str__(self) -> str:
        return str(self.value)

    @classmethod
    def choices(cls) -> list[str]:
        """Returns the allowed string values, in definition order. Used in CLI help and config error messages."""
        return [member.value for member in cls]
