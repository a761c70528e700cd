import enum


class TensorKind(enum.Enum):
    iid = 1
    symmetric = 2
    partially_symmetric = 3
    piezoelectric = 4


class SpectralFunctional(enum.Enum):
    l2_singular = 1
    ld_singular = 2
    z_eig = 3
    h_eig = 4
    m_eig = 5
    c_eig = 6

    @property
    def slug(self) -> str:
        """Name used on the command line and in result files."""
        return self.name.replace("_", "")

    def uses_ld_sphere(self) -> bool:
        cls = type(self)
        return self in (cls.ld_singular, cls.h_eig)

    def compatible_kinds(self) -> tuple[TensorKind, ...]:
        cls = type(self)
        if self in (cls.z_eig, cls.h_eig):
            return (TensorKind.symmetric,)
        if self is cls.m_eig:
            return (TensorKind.partially_symmetric,)
        if self is cls.c_eig:
            return (TensorKind.piezoelectric,)
        return tuple(TensorKind)

    @classmethod
    def from_slug(cls, text: str) -> "SpectralFunctional":
        """Accepts the slug (``zeig``) or the member name (``z_eig``)."""
        key = text.strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.name, member.slug):
                return member
        raise ValueError(f"Unknown spectral functional {text!r}")
