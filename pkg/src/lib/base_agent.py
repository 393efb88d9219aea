# src/lib/base_agent.py

from abc import ABC, abstractmethod
from typing import Any

from pydantic import BaseModel, ConfigDict


class BaseAgentConfig(BaseModel):
    """Base configuration shared by agents"""

    model_config = ConfigDict(extra="forbid")


class BaseAgent(ABC):
    """Orchestrates a sequence of tools"""

    def __init__(self, config: BaseAgentConfig):
        self.config = config

    @abstractmethod
    def process(self, *args: Any, **kwargs: Any) -> Any:
        """Run the agent's workflow"""
