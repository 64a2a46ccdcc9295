import typing as t

from pydantic import BaseModel, ConfigDict

from .handling_error import ConfigError
from .ops_config import Experiment


class Route(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    experiment: Experiment
    handler: t.Callable
    columns: list[str]
    summary: str = ""

    @property
    def help_text(self) -> str:
        return f"{self.summary}\n\nCSV columns: {', '.join(self.columns)}"


class ExperimentRouter:
    """Registry of experiment handlers, one per CLI subcommand."""

    def __init__(self):
        self.routes: dict[Experiment, Route] = {}

    def experiment(self, name: Experiment | str, columns: list[str], summary: str = ""):
        def decorator(func: t.Callable) -> t.Callable:
            key = Experiment(name)
            self.routes[key] = Route(experiment=key, handler=func, columns=columns, summary=summary)
            return func

        return decorator

    def include_router(self, other: "ExperimentRouter") -> None:
        self.routes.update(other.routes)

    def get(self, name: Experiment | str) -> Route:
        key = Experiment(name)
        if key not in self.routes:
            raise ConfigError(f"no handler registered for experiment {key.value!r}")
        return self.routes[key]
