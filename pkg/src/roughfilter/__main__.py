"""Main entry point for roughfilter."""
import sys

from roughfilter.cli import run


def main():
    """Run the command line and exit with its status."""
    sys.exit(run())


if __name__ == "__main__":
    main()
