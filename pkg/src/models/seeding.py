import numpy as np

# Stream tags keep the different random consumers of one run independent
INIT_STREAM = 1
SHUFFLE_STREAM = 2
FRESH_STREAM = 3
BOOTSTRAP_STREAM = 4
FOLD_STREAM = 5
SPLIT_STREAM = 6
DATA_STREAM = 7


def derive_seed(*keys: int) -> int:
    """Derive a 64-bit seed from a run seed and integer keys (e.g. epoch, round)."""
    entropy = [int(k) for k in keys]
    if any(k < 0 for k in entropy):
        raise ValueError(f"Seed keys must be non-negative, got {entropy}")
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])


def member_seed(seed: int, index: int) -> int:
    """Initialization seed of ensemble member / round `index`."""
    return derive_seed(seed, INIT_STREAM, index)


def train_seed(seed: int, index: int) -> int:
    """Mini-batch shuffling seed of ensemble member / round `index`."""
    return derive_seed(seed, SHUFFLE_STREAM, index)


def fresh_seed(seed: int, index: int) -> int:
    """Seed for the re-initialized upper layers of a transferred student."""
    return derive_seed(seed, FRESH_STREAM, index)
