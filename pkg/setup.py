from setuptools import setup, find_packages

setup(
    name="Pyedde",
    version="1.0.0",
    description="Diversity-driven neural network ensembles with layer-wise knowledge transfer",
    packages=find_packages(include=["src", "src.*"]),
    install_requires=[
        'numpy',
        'scipy',
        'pandas',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['pyedde=src.views.cli:main'],
    },
    python_requires='>=3.8',
)
