import sys

from bdtp.cli import main

sys.exit(main())
