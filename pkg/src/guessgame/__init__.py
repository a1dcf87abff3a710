"""Image-pool guessing game with a latent-intention questioner."""

__version__ = "0.1.0"
