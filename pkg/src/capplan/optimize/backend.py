"""Select the compiled pivot kernel at import, falling back to numpy."""

try:
    from . import _kernel as kernel
except ImportError:  # extension not built on this install
    from . import _kernel_py as kernel

from . import _kernel_py as kernel_py

KERNEL_BACKEND = kernel.BACKEND


def get_kernel(name: str | None = None):
    """Return a kernel module by name ('cython' | 'numpy' | None for default)."""
    if name is None:
        return kernel
    if name == "numpy":
        return kernel_py
    if name == "cython":
        if kernel.BACKEND != "cython":
            raise ImportError("compiled kernel not available")
        return kernel
    raise ValueError(f"unknown kernel backend {name!r}")
