"""Exception types shared across the package."""


class EditkitError(Exception):
    """Base class for all editkit errors."""


class CorpusFormatError(EditkitError):
    """A corpus file line failed validation."""

    def __init__(self, path, line_no, field, message):
        self.path = str(path)
        self.line_no = line_no
        self.field = field
        loc = f"{self.path}:{line_no}"
        if field is not None:
            loc += f" (field {field!r})"
        super().__init__(f"{loc}: {message}")


class AlignmentError(EditkitError):
    """An edit alignment is inconsistent with the sentence it was applied to."""


class SlotNotFoundError(EditkitError):
    """One or more slots could not be located in the source sentence."""

    def __init__(self, slots):
        self.slots = list(slots)
        listing = ", ".join(repr(s) for s in self.slots)
        super().__init__(f"slot(s) not found in source: {listing}")


class TemplateError(EditkitError):
    """A template is malformed or inconsistent with its alignment."""
