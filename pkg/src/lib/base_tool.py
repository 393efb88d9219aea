# src/lib/base_tool.py

from abc import ABC, abstractmethod
from typing import Any

from pydantic import BaseModel, ConfigDict


class BaseToolConfig(BaseModel):
    """Base configuration shared by all pipeline tools"""

    model_config = ConfigDict(extra="forbid", frozen=True)


class BaseTool(ABC):
    """A single pipeline stage, constructed from its config"""

    def __init__(self, config: BaseToolConfig):
        self.config = config

    @abstractmethod
    def run(self, *args: Any, **kwargs: Any) -> Any:
        """Execute the tool's main operation"""
