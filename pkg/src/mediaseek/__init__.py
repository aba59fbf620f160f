"""mediaseek: content-based retrieval across images, audio, video and 3D meshes."""

__version__ = "0.1.0"
