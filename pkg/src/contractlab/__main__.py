from contractlab.cli import main

main()
