"""
Kasamawashi — Точка входа
python -m src.main <подкоманда> --config configs/<сценарий>.json
"""
import sys

from src.interfaces.cli import main

if __name__ == "__main__":
    sys.exit(main())
