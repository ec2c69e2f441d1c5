"""Runtime adapter: the airline state as a guarded conversation
environment."""
from __future__ import annotations

from datetime import datetime

from ..errors import RuntimeFault, ToolError
from ..lang import DataApi
from .state import EnvState
from .tools import execute_tool, is_mutating


class _ReadOnlyApi(DataApi):
    def __init__(self, env: "AirlineEnvironment"):
        self._env = env

    def call(self, tool: str, args: dict):
        if is_mutating(tool):
            raise RuntimeFault(
                f"sandbox violation: mutating tool {tool!r} invoked through"
                " the read-only data api"
            )
        try:
            _state, payload = execute_tool(self._env.state, tool, args)
        except ToolError as e:
            raise RuntimeFault(f"data api call {tool} failed: {e}") from e
        return payload


class AirlineEnvironment:
    def __init__(self, state: EnvState):
        self.state = state

    @property
    def now(self) -> datetime:
        return self.state.now

    def is_mutating(self, tool: str) -> bool:
        return is_mutating(tool)

    def execute(self, tool: str, args: dict):
        new_state, payload = execute_tool(self.state, tool, args)
        self.state = new_state
        return payload

    def read_api(self) -> DataApi:
        return _ReadOnlyApi(self)

    def snapshot(self) -> EnvState:
        return self.state.clone()
