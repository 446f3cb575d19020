import sys

from cobweb.cli import main

sys.exit(main())
