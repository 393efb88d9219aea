# src/lib/__init__.py
