"""Near-field URA simulator entry point."""

from src.presentation.cli import app


def main() -> None:
    """Run the command-line interface."""
    app()


if __name__ == "__main__":
    main()
