#!/usr/bin/env python3
"""
Entry wrapper for the spectral-contour command line.

Usage: spectral_contour_main.py <command> --scene PATH [options]
"""
import sys


def main():
    if len(sys.argv) < 2:
        print("usage: spectral-contour <command> --scene PATH [--nodes N] [--seed S] [--out DIR] [--csv]",
              file=sys.stderr)
        sys.exit(2)

    from spectral_contour.cli import app
    app(prog_name='spectral-contour')


if __name__ == '__main__':
    main()
