
from setuptools import setup

kwargs = {'author': '',
 'author_email': '',
 'classifiers': ['Intended Audience :: Science/Research',
                 'Topic :: Scientific/Engineering',
                 'Topic :: Scientific/Engineering :: Mathematics',
                 'Programming Language :: Python :: 3'],
 'description': 'Drift analysis lab for the (1+1) evolutionary algorithm',
 'download_url': '',
 'entry_points': {
     'console_scripts': ['driftlab=driftlab.cli:main'],
     'openmdao_component': [
         'driftlab.components.MultiplicativeDriftBound=driftlab.components:MultiplicativeDriftBound',
         'driftlab.components.LinearRuntimeBounds=driftlab.components:LinearRuntimeBounds',
         'driftlab.components.GraphRuntimeBounds=driftlab.components:GraphRuntimeBounds',
     ],
     'openmdao_group': [
         'driftlab.components.RuntimeBounds=driftlab.components:RuntimeBounds',
     ],
 },
 'extras_require': {'test': ['hypothesis', 'pytest'],
                    'docs': ['sphinx']},
 'include_package_data': True,
 'install_requires': ['openmdao>=3.2', 'numpy', 'scipy', 'networkx'],
 'keywords': ['openmdao', 'evolutionary algorithms', 'drift analysis'],
 'license': '',
 'maintainer': '',
 'maintainer_email': '',
 'name': 'driftlab',
 'package_dir': {'': 'src'},
 'packages': ['driftlab', 'driftlab.test'],
 'python_requires': '>=3.8',
 'url': '',
 'version': '2.0',
 'zip_safe': False}


setup(**kwargs)
