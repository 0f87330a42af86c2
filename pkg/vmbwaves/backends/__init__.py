from vmbwaves.backends.base import PropagatorBackend
from vmbwaves.backends.eigen import EigenBackend
from vmbwaves.backends.expm import ExpmBackend

BACKENDS = {"eigen": EigenBackend, "expm": ExpmBackend}


def get_backend(name: str = "eigen") -> PropagatorBackend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"Unknown propagation backend {name!r}; choose from {', '.join(BACKENDS)}") from None
