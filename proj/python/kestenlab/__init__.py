from ._kesten import *  # noqa: F401,F403
