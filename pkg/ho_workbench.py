"""
HO Semantics Workbench - Launcher

Runs the workbench command line from a checkout:

    python ho_workbench.py check-spec assets/xcl.hos
    python ho_workbench.py run xcl "(S K) I" --steps 10
    python ho_workbench.py bisim lambda_cbn OMEGA THETA --depth 20
"""

import sys

from ho_semantics.main import main

if __name__ == "__main__":
    sys.exit(main())
