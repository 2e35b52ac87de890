"""
Provides a single source of truth for the version number. Modify the string
`__version__ = '0.1.0'` to conform to the correct version number, which should
be compliant with PEP 440.

This mechanism for setting the version number also requires the following:
1) That the __init__.py file in this directory have the snippet:

    from . __version__ import __version__

2) That the setup.cfg file in the project directory include the following
snippet:

    [metadata]
    …
    version = attr: laval_transonic.__version__.__version__

The version string is also written into every run manifest, so two runs can be
compared only when they were produced by the same version.
"""


__version__ = '0.1.0'
