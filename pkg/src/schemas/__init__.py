# src/schemas/__init__.py
