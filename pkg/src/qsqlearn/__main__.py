import sys

from qsqlearn.cli import main

sys.exit(main())
