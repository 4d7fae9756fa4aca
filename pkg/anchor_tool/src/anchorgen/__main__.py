import sys

from anchorgen.cli import main

sys.exit(main())
