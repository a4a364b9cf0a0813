"""Speech-to-trajectory: log-spectrogram features, a small CNN regressor,
and a streaming runtime that turns spoken command words into five finger
flexion targets in [0, 1].

Submodules are imported explicitly (``speech2traj.model``, ``.training``,
...); this package root stays import-light so the CLI can configure
threading before numpy loads.
"""

__version__ = "0.1.0"
