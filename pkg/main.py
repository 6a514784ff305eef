import sys

from src.views.cli import main


if __name__ == "__main__":
    sys.exit(main())
