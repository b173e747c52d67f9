# Package init
