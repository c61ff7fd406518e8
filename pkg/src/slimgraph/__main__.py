import sys

from slimgraph.cli import main

sys.exit(main())
