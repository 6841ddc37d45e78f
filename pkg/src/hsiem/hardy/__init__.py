# HSIEM Hardy Space Package
