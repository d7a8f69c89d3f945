import sys

from carloc.main import main

sys.exit(main())
