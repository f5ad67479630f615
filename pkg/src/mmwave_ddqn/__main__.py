import sys

from mmwave_ddqn.cli import main

sys.exit(main())
