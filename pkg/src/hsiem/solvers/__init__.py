# HSIEM Solvers Package
