"""
This module defines Registries which map every spectral functional to the
ascent routine that runs a single start of its maximization.
"""

from dataclasses import dataclass, field
from typing import Callable, Union

from rtbounds.kinds import SpectralFunctional


@dataclass
class _AscentDefinition:
    """
    An internal dataclass pairing a functional with the callable that
    improves one start for it.
    """

    functional: SpectralFunctional
    target: Callable

    def __call__(self, *args, **kwargs):
        return self.target(*args, **kwargs)


@dataclass
class AscentRegistry:
    """
    Tracks the ascent routine registered for each functional.

    Multiple registries may be instantiated, for example to try an
    alternative iteration without touching the default one.
    """

    _ascent_defs: dict[SpectralFunctional, _AscentDefinition] = field(
        default_factory=dict
    )

    def __getitem__(
        self, key: Union[str, SpectralFunctional]
    ) -> _AscentDefinition:
        """
        Resolve a functional, or its slug, to its ascent routine.

        Raises
        ------
        KeyError:
            No routine is registered for the functional.
        """
        return self._ascent_defs[self.resolve_functional(key)]

    def __contains__(self, key: Union[str, SpectralFunctional]) -> bool:
        try:
            functional = self.resolve_functional(key)
        except KeyError:
            return False
        return functional in self._ascent_defs

    def __len__(self):
        return len(self._ascent_defs)

    def add_ascent(self, func: Callable, functional: SpectralFunctional):
        """
        Register ``func`` as the ascent routine of ``functional``.

        Raises
        ------
        ValueError:
            A routine is already registered for the functional.
        """
        if functional in self:
            raise ValueError(
                f"An ascent for {functional.slug} is already registered"
            )
        self._ascent_defs[functional] = _AscentDefinition(functional, func)
        return func

    @staticmethod
    def resolve_functional(
        key: Union[str, SpectralFunctional]
    ) -> SpectralFunctional:
        if isinstance(key, SpectralFunctional):
            return key
        try:
            return SpectralFunctional.from_slug(key)
        except ValueError:
            raise KeyError(key)

    def clear_registry(self):
        self._ascent_defs = {}


Registry = AscentRegistry()


def ascent(functional: SpectralFunctional, registry: AscentRegistry = Registry):
    """
    Register a function as the single-start ascent of ``functional``
    within ``registry`` (the global ``Registry`` by default).
    """

    def __internal(func):
        registry.add_ascent(func, functional)
        return func

    return __internal
