"""
This is the setup file for managing the esrom package
"""

import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="esrom",
    version="0.1.0",
    description="Entropy stable reduced order models on nonlinear manifolds for 1D conservation laws",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(),
    package_data={
        "esrom": ["logging.conf", "workflow/luigi/logging.conf"],
        "esrom.config": ["*.json", "experiments/*.json"]
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    install_requires=[
        "luigi>=2.8.10",
        "numpy>=1.19.2",
        "scipy>=1.6.2",
        "pandas>=1.1.0",
        "scikit-learn>=0.24.1",
        "pytest>=7.0",
        "pytest-cov>=2.10.1",
        "pycodestyle>=2.6.0"
    ]
)
