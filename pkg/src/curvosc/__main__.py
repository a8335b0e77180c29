import sys

from curvosc.cli import main

sys.exit(main())
