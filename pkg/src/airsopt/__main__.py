import sys

from airsopt.cli import main

sys.exit(main())
