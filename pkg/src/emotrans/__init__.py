"""Emotion-state transition fingerprints for emotional-disorder screening."""
__version__ = "0.1.0"
