import sys

from phyplan.cli import main

sys.exit(main())
