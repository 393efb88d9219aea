# src/agents/__init__.py
