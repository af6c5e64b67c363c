import sys

from backline.cli import main

sys.exit(main())
