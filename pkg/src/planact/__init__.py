"""planact: subgoal-manual planning plus diffusion action policy in a block world."""

__version__ = "0.1.0"
