import sys

from afa.cli import main

sys.exit(main())
