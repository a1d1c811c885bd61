"""Model adapter service.

Serves perception models behind the engine's wire protocol: open-vocabulary
detection on ``/detect``, phrase grounding on ``/ground``, image-text matching
on ``/match``, masked-answer filtering on ``/filter_answers``.  A
``ModelRegistry`` binds each capability to a model (real pre-trained
checkpoints, or annotation-backed stand-ins for desk work) and to the image
store that maps image ids to files.
"""

__version__ = "0.1.0"
