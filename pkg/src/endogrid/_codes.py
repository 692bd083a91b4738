"""Integer codes shared by both kernel backends and the python layer."""

# Sample kinds on an internal path.
KIND_STEP = 0   # plain grid sample (scheme step or horizon endpoint)
KIND_EXIT = 1   # sample placed exactly on a crossed grid line
KIND_JUMP = 2   # post-jump value at a jump time

# Observation causes on a sampled path.
OBS_INITIAL = 0
OBS_DIFFUSION = 1
OBS_JUMP = 2

CAUSE_NAMES = {OBS_INITIAL: "initial", OBS_DIFFUSION: "diffusion-exit", OBS_JUMP: "jump-exit"}
CAUSE_CODES = {v: k for k, v in CAUSE_NAMES.items()}
