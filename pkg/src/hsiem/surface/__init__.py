# HSIEM Surface Calculus Package
