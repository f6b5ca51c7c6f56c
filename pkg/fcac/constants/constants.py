from __future__ import annotations


__all__ = (
    "DEFAULT_SAMPLE_RATE",
    "DEFAULT_FRAME_LEN_MS",
    "DEFAULT_HOP_MS",
    "DEFAULT_N_MELS",
    "DEFAULT_LOG_FLOOR",
    "PCM16_SCALE",
    "HTK_MEL_FACTOR",
    "HTK_MEL_BREAK_HZ"
)


DEFAULT_SAMPLE_RATE: int = 16000
DEFAULT_FRAME_LEN_MS: float = 25.0
DEFAULT_HOP_MS: float = 10.0
DEFAULT_N_MELS: int = 128
DEFAULT_LOG_FLOOR: float = 1e-10

PCM16_SCALE: float = 32768.0

HTK_MEL_FACTOR: float = 2595.0
HTK_MEL_BREAK_HZ: float = 700.0
