"""StrategicDynamics entry point script.

This script allows the package to be run as a module using `python -m StrategicDynamics`.
"""
# StrategicDynamics/__main__.py

from StrategicDynamics import cli, __app_name__


def main():
    """
    Main function to execute the Typer CLI application.
    """
    cli(prog_name=__app_name__)


if __name__ == "__main__":
    main()
