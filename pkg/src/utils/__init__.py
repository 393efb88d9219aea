# src/utils/__init__.py
