"""pianolabel: semi-automatic piano fingering annotation from hand
landmarks and MIDI, with audio-MIDI alignment, loudness normalization,
audio-visual onset filtering, and transcription evaluation."""

__version__ = "0.1.0"

from . import (alignment, audio, avfilter, depth, fingering, geometry,
               loudness, metrics, midi)

__all__ = ["alignment", "audio", "avfilter", "depth", "fingering",
           "geometry", "loudness", "metrics", "midi"]
