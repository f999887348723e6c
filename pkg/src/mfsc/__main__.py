import sys

from mfsc.cli import main

sys.exit(main())
