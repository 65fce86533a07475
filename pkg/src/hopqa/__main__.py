import sys

from hopqa.cli import main

sys.exit(main())
