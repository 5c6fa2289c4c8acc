# isometry_systems/core/schemas.py
from pydantic import BaseModel, Field

from isometry_systems.core.lamination import DEFAULT_LEGALITY_DEPTH
from isometry_systems.core.sysiso import DEFAULT_MAX_WORDS

# Run parameters shared by every CLI subcommand. Each report embeds the
# config it was produced with, so a report never states a result without the
# depths and budgets behind it.


class Budgets(BaseModel):
    max_steps: int = Field(default=20, ge=0)
    max_words: int = Field(default=DEFAULT_MAX_WORDS, ge=0)
    max_components: int = Field(default=10_000, ge=0)


class Depths(BaseModel):
    language_n: int = Field(default=4, ge=1)
    legality_L: int = Field(default=DEFAULT_LEGALITY_DEPTH, ge=1)
    recurrence_R: int = Field(default=20, ge=1)
    radius_r: int = Field(default=6, ge=1)


class RunConfig(BaseModel):
    budgets: Budgets = Field(default_factory=Budgets)
    depths: Depths = Field(default_factory=Depths)
    out: str = "."
    seed: int = 0  # corpus generation only; the algorithms are deterministic
