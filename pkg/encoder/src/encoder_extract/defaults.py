"""Versioned training hyperparameters.

Every fine-tuning run records ``DEFAULTS_VERSION`` and the resolved values
into its job manifest so that a feature file can always be traced back to
the exact recipe that produced it.  Bump the version string whenever a
value here changes.
"""

DEFAULTS_VERSION = "2024.1"

FINETUNE_DEFAULTS = {
    "learning_rate": 5e-5,
    "batch_size": 8,
    "weight_decay": 0.01,
    "mask_probability": 0.15,   # MLM corruption rate
    "nsp_negative_rate": 0.5,   # fraction of sentence pairs with a random B
    "max_tokens": 512,
}
