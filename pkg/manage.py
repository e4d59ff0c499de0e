#!/usr/bin/env python3
"""
Minimal manage.py that forwards to the cascadenet CLI main.
"""
import sys


def main():
    from cascadenet.cli import main as cli_main
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
