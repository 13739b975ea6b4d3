"""Hook for the CLI: ``python -m ringjsa``

"""

from ringjsa.cli import main


if __name__ == "__main__":
    main()
