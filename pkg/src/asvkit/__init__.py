"""Text-independent speaker verification toolkit.

Speech frontend (VAD plus log-mel features), an LSTM d-vector embedding
network trained with a generalized end-to-end loss, sliding-window
evaluation with EER scoring, a small statistics toolkit, and a reproducible
cohort experiment harness.
"""

__version__ = "0.1.0"
