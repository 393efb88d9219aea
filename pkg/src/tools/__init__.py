# src/tools/__init__.py
