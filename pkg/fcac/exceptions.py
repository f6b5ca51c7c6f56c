from __future__ import annotations


from typing import (
    ClassVar,
    Iterable,
    Self
)


class FcacError(Exception):
    __slots__ = ()

    exit_code: ClassVar[int] = 2


class ValidationError(FcacError):
    __slots__ = ()

    exit_code: ClassVar[int] = 1


class RuntimeFailure(FcacError):
    __slots__ = ()

    exit_code: ClassVar[int] = 2


class VerificationFailure(FcacError):
    __slots__ = ("failed_checks",)

    exit_code: ClassVar[int] = 3

    def __init__(
        self: Self,
        failed_checks: Iterable[str]
    ) -> None:
        failed_checks = tuple(failed_checks)
        super().__init__(f"Verification failed: {", ".join(failed_checks)}")
        self.failed_checks: tuple[str, ...] = failed_checks


# dsp

class InvalidAudio(ValidationError):
    __slots__ = ()


class ClipTooShort(ValidationError):
    __slots__ = (
        "clip_id",
        "n_samples",
        "frame_len_samples"
    )

    def __init__(
        self: Self,
        clip_id: str,
        n_samples: int,
        frame_len_samples: int
    ) -> None:
        super().__init__(
            f"Clip '{clip_id}' has {n_samples} samples, fewer than one frame of {frame_len_samples}"
        )
        self.clip_id: str = clip_id
        self.n_samples: int = n_samples
        self.frame_len_samples: int = frame_len_samples


class InvalidLength(ValidationError):
    __slots__ = ()


class FrameTooLong(ValidationError):
    __slots__ = ()


class InvalidBand(ValidationError):
    __slots__ = ()


class SampleRateMismatch(ValidationError):
    __slots__ = ()


# diffmath

class ShapeMismatch(ValidationError):
    __slots__ = ("op_id",)

    def __init__(
        self: Self,
        op_id: str,
        message: str
    ) -> None:
        super().__init__(f"[{op_id}] {message}")
        self.op_id: str = op_id


class NonScalarRoot(ValidationError):
    __slots__ = ()


class NonFiniteValue(RuntimeFailure):
    __slots__ = ("op_id",)

    def __init__(
        self: Self,
        op_id: str
    ) -> None:
        super().__init__(f"[{op_id}] produced non-finite values")
        self.op_id: str = op_id


# embedder

class FrozenParameters(ValidationError):
    __slots__ = ()


class IoError(RuntimeFailure):
    __slots__ = ()


class VersionMismatch(RuntimeFailure):
    __slots__ = ()


class CorruptChecksum(RuntimeFailure):
    __slots__ = ()


# losses

class ZeroVector(ValidationError):
    __slots__ = ()


class NoPositives(ValidationError):
    __slots__ = ("anchor_index",)

    def __init__(
        self: Self,
        anchor_index: int
    ) -> None:
        super().__init__(f"Anchor {anchor_index} has no positive in the batch")
        self.anchor_index: int = anchor_index


class BatchTooSmall(ValidationError):
    __slots__ = ()


class LabelOutOfRange(ValidationError):
    __slots__ = ()


class MissingPrototype(ValidationError):
    __slots__ = ("class_id",)

    def __init__(
        self: Self,
        class_id: int
    ) -> None:
        super().__init__(f"No prototype for class {class_id}")
        self.class_id: int = class_id


# classifier

class EmptyClass(ValidationError):
    __slots__ = ("class_id",)

    def __init__(
        self: Self,
        class_id: int,
        message: str | None = None
    ) -> None:
        super().__init__(message or f"Class {class_id} has no samples")
        self.class_id: int = class_id


class EmptyPrototype(EmptyClass):
    __slots__ = ()

    def __init__(
        self: Self,
        class_id: int
    ) -> None:
        super().__init__(class_id, f"Mean embedding of class {class_id} is the zero vector")


class DuplicateClass(ValidationError):
    __slots__ = ("class_id",)

    def __init__(
        self: Self,
        class_id: int
    ) -> None:
        super().__init__(f"Class {class_id} already exists in the classifier")
        self.class_id: int = class_id


class EmptyClassifier(ValidationError):
    __slots__ = ()


# protocol

class InsufficientClasses(ValidationError):
    __slots__ = ()


class InsufficientShots(ValidationError):
    __slots__ = (
        "class_id",
        "available",
        "required"
    )

    def __init__(
        self: Self,
        class_id: int,
        available: int,
        required: int
    ) -> None:
        super().__init__(f"Class {class_id} has {available} training clips, {required} required")
        self.class_id: int = class_id
        self.available: int = available
        self.required: int = required


class EmptyEvalSet(ValidationError):
    __slots__ = ()


class TooFewSessions(ValidationError):
    __slots__ = ()


class DegenerateInput(ValidationError):
    __slots__ = ()


class Diverged(RuntimeFailure):
    __slots__ = ()


class SessionClosed(RuntimeFailure):
    __slots__ = ("session_index",)

    def __init__(
        self: Self,
        session_index: int,
        current_index: int
    ) -> None:
        super().__init__(
            f"Training data of session {session_index} is no longer available in session {current_index}"
        )
        self.session_index: int = session_index


# datagen

class TooManyClasses(ValidationError):
    __slots__ = ()


class UnsupportedFormat(ValidationError):
    __slots__ = ()


class MalformedHeader(ValidationError):
    __slots__ = ()


class ParseError(ValidationError):
    __slots__ = ("line_number",)

    def __init__(
        self: Self,
        line_number: int,
        message: str
    ) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number: int = line_number


class MissingFile(ValidationError):
    __slots__ = ("paths",)

    def __init__(
        self: Self,
        paths: Iterable[str]
    ) -> None:
        paths = tuple(paths)
        super().__init__(f"Missing files: {", ".join(paths)}")
        self.paths: tuple[str, ...] = paths


# cli

class ConfigError(ValidationError):
    __slots__ = ()


class ExtractionFailed(ValidationError):
    __slots__ = ("failures",)

    def __init__(
        self: Self,
        failures: Iterable[tuple[str, str]]
    ) -> None:
        failures = tuple(failures)
        listing = "\n".join(f"  {clip_id}: {message}" for clip_id, message in failures)
        super().__init__(f"Feature extraction failed for {len(failures)} clip(s):\n{listing}")
        self.failures: tuple[tuple[str, str], ...] = failures
